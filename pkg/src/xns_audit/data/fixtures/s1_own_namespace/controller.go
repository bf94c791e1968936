package controllers

import (
	"context"

	corev1 "k8s.io/api/core/v1"
	"k8s.io/apimachinery/pkg/types"
	ctrl "sigs.k8s.io/controller-runtime"
	"sigs.k8s.io/controller-runtime/pkg/client"
)

// AppReconciler only touches objects in the App's own namespace.
type AppReconciler struct {
	client.Client
}

// Reconcile references the Secret and ConfigMap next to the App.
func (r *AppReconciler) Reconcile(ctx context.Context, req ctrl.Request) (ctrl.Result, error) {
	app := &App{}
	if err := r.Get(ctx, req.NamespacedName, app); err != nil {
		return ctrl.Result{}, err
	}

	key := types.NamespacedName{Namespace: app.Namespace, Name: app.Spec.SecretName}
	secret := &corev1.Secret{}
	if err := r.Get(ctx, key, secret); err != nil {
		return ctrl.Result{}, err
	}

	cm := &corev1.ConfigMap{}
	cmKey := types.NamespacedName{Namespace: app.GetNamespace(), Name: app.Spec.ConfigName}
	if err := r.Get(ctx, cmKey, cm); err != nil {
		return ctrl.Result{}, err
	}

	mirror := &corev1.ConfigMap{}
	mirror.Name = app.Spec.ConfigName + "-mirror"
	mirror.Namespace = app.ObjectMeta.Namespace
	mirror.SetNamespace(req.Namespace)
	mirror.Data = cm.Data
	return ctrl.Result{}, r.Create(ctx, mirror)
}
