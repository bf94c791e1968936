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

// Reconcile delegates credential loading to helpers.
func (r *AppReconciler) Reconcile(ctx context.Context, req ctrl.Request) (ctrl.Result, error) {
	app := &App{}
	if err := r.Get(ctx, req.NamespacedName, app); err != nil {
		return ctrl.Result{}, err
	}
	if err := r.syncCredentials(ctx, app.Spec.SecretRef); err != nil {
		return ctrl.Result{}, err
	}
	return ctrl.Result{}, nil
}

func (r *AppReconciler) syncCredentials(ctx context.Context, ref SecretReference) error {
	_, err := r.loadSecret(ctx, ref.Name, ref.Namespace)
	return err
}

func (r *AppReconciler) loadSecret(ctx context.Context, name, namespace string) (*corev1.Secret, error) {
	key := types.NamespacedName{Name: name}
	key.Namespace = namespace
	secret := &corev1.Secret{}
	if err := r.Get(ctx, key, secret); err != nil {
		return nil, err
	}
	return secret, nil
}
