package controllers

import (
	"context"

	corev1 "k8s.io/api/core/v1"
	metav1 "k8s.io/apimachinery/pkg/apis/meta/v1"
	"k8s.io/apimachinery/pkg/types"
	ctrl "sigs.k8s.io/controller-runtime"
	"sigs.k8s.io/controller-runtime/pkg/client"
)

// ClusterConfigReconciler acts across namespaces on behalf of administrators.
type ClusterConfigReconciler struct {
	client.Client
}

// Reconcile copies a Secret into the target namespace it creates.
func (r *ClusterConfigReconciler) Reconcile(ctx context.Context, req ctrl.Request) (ctrl.Result, error) {
	cfg := &ClusterConfig{}
	if err := r.Get(ctx, req.NamespacedName, cfg); err != nil {
		return ctrl.Result{}, err
	}

	ns := &corev1.Namespace{ObjectMeta: metav1.ObjectMeta{Name: cfg.Spec.TargetNamespace}}
	if err := r.Create(ctx, ns); err != nil {
		return ctrl.Result{}, err
	}

	key := types.NamespacedName{Namespace: cfg.Spec.TargetNamespace, Name: cfg.Spec.SecretName}
	secret := &corev1.Secret{}
	if err := r.Get(ctx, key, secret); err != nil {
		return ctrl.Result{}, err
	}
	return ctrl.Result{}, nil
}
