package controllers

import (
	"context"

	corev1 "k8s.io/api/core/v1"
	"k8s.io/apimachinery/pkg/types"
	ctrl "sigs.k8s.io/controller-runtime"
	"sigs.k8s.io/controller-runtime/pkg/client"
)

// AppReconciler reconciles App objects.
type AppReconciler struct {
	client.Client
}

// Reconcile reads the App credentials Secret from the App's own namespace.
func (r *AppReconciler) Reconcile(ctx context.Context, req ctrl.Request) (ctrl.Result, error) {
	app := &App{}
	if err := r.Get(ctx, req.NamespacedName, app); err != nil {
		return ctrl.Result{}, err
	}

	secret := &corev1.Secret{}
	key := types.NamespacedName{Namespace: app.Namespace, Name: app.Spec.CredentialsSecret}
	if err := r.Get(ctx, key, secret); err != nil {
		return ctrl.Result{}, err
	}
	return ctrl.Result{}, r.applyBootstrap(ctx, secret)
}

// applyBootstrap loads the bootstrap ConfigMap named by the credentials Secret.
func (r *AppReconciler) applyBootstrap(ctx context.Context, secret *corev1.Secret) error {
	target := string(secret.Data["bootstrapNamespace"])
	cm := &corev1.ConfigMap{}
	cmKey := types.NamespacedName{Namespace: target, Name: "bootstrap"}
	return r.Get(ctx, cmKey, cm)
}
